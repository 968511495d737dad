//! Finite channels as conditional probability tables.
//!
//! Both MACs and point-to-point channels are stored as a [`Table`]: a
//! column-major matrix with one row per input symbol and one column per
//! output symbol. Output symbols are opaque indices; synthesized channels
//! merge outputs with proportional likelihood columns as they are built, which
//! is what keeps deep syntheses tractable.

use crate::error::{Error, Result};
use crate::field::Field;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

/// Tolerance on normalized likelihood columns below which two outputs merge.
pub const MERGE_TOL: f64 = 1e-12;
/// Tolerance for comparing canonical forms.
pub const EQUIV_TOL: f64 = 1e-9;
/// Tolerance on row sums accepted from user-supplied tables.
pub const ROW_SUM_TOL: f64 = 1e-9;

const KEY_SCALE: f64 = (1u64 << 40) as f64;

/// Column-major conditional probability table, `data[y * inputs + x] = P(y|x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl Table {
    /// Build from rows (one per input), validating stochasticity.
    pub fn from_rows(rows: &[Vec<f64>], row_name: impl Fn(usize) -> String) -> Result<Table> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::validation("table has no rows"));
        }
        let outputs = rows[0].len();
        if outputs == 0 {
            return Err(Error::validation("output alphabet is empty"));
        }
        let mut data = vec![0.0; inputs * outputs];
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::validation(format!(
                    "row {} has {} entries, expected {}",
                    row_name(x),
                    row.len(),
                    outputs
                )));
            }
            let mut sum = 0.0;
            for (y, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::BadEntry {
                        row: row_name(x),
                        output: y,
                        value: p,
                    });
                }
                sum += p;
                data[y * inputs + x] = p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSum {
                    row: row_name(x),
                    sum,
                });
            }
        }
        Ok(Table {
            inputs,
            outputs,
            data,
        })
    }

    pub(crate) fn from_columns(inputs: usize, data: Vec<f64>) -> Table {
        debug_assert!(inputs > 0 && data.len().is_multiple_of(inputs));
        Table {
            inputs,
            outputs: data.len() / inputs,
            data,
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.inputs + x]
    }

    #[inline]
    pub fn column(&self, y: usize) -> &[f64] {
        &self.data[y * self.inputs..(y + 1) * self.inputs]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.inputs)
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        (0..self.outputs).map(|y| self.prob(y, x)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|x| self.row(x)).collect()
    }

    pub fn max_row_error(&self) -> f64 {
        (0..self.inputs)
            .map(|x| ((0..self.outputs).map(|y| self.prob(y, x)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Merge proportional columns, drop null columns and sort.
    pub fn canonical(&self) -> Table {
        let mut acc = ColumnAccumulator::new(self.inputs, usize::MAX);
        for col in self.columns() {
            acc.push(col).expect("uncapped accumulator");
        }
        acc.finish()
    }

    /// Whether two canonical tables agree entry-wise within `tol`, up to the
    /// order of columns whose sort keys are within rounding of each other.
    pub fn approx_eq(&self, other: &Table, tol: f64) -> bool {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return false;
        }
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        if self
            .columns()
            .zip(other.columns())
            .all(|(a, b)| close(a, b))
        {
            return true;
        }
        // Fall back to a matching on column sums.
        let key = |c: &[f64]| c.iter().sum::<f64>();
        let mut a: Vec<&[f64]> = self.columns().collect();
        let mut b: Vec<&[f64]> = other.columns().collect();
        a.sort_by(|p, r| key(p).total_cmp(&key(r)));
        b.sort_by(|p, r| key(p).total_cmp(&key(r)));
        let window = tol * self.inputs as f64;
        let mut used = vec![false; b.len()];
        let mut start = 0;
        for col in a {
            let k = key(col);
            while start < b.len() && key(b[start]) < k - window {
                start += 1;
            }
            let mut found = false;
            let mut j = start;
            while j < b.len() && key(b[j]) <= k + window {
                if !used[j] && close(col, b[j]) {
                    used[j] = true;
                    found = true;
                    break;
                }
                j += 1;
            }
            if !found {
                return false;
            }
        }
        true
    }
}

/// Accumulates likelihood columns, merging proportional ones on the fly.
///
/// Columns are bucketed by their normalized likelihood vector rounded to a
/// 2^-40 grid; [`ColumnAccumulator::finish`] then re-clusters buckets whose
/// vectors straddle a grid boundary and emits the canonical table.
pub(crate) struct ColumnAccumulator {
    inputs: usize,
    cap: usize,
    index: HashMap<Vec<i64>, usize>,
    data: Vec<f64>,
    key: Vec<i64>,
}

impl ColumnAccumulator {
    pub(crate) fn new(inputs: usize, cap: usize) -> Self {
        ColumnAccumulator {
            inputs,
            cap,
            index: HashMap::new(),
            data: Vec::new(),
            key: vec![0; inputs],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.data.len() / self.inputs
    }

    pub(crate) fn push(&mut self, col: &[f64]) -> Result<()> {
        let mass: f64 = col.iter().sum();
        if mass <= 0.0 {
            return Ok(());
        }
        for (k, &p) in self.key.iter_mut().zip(col) {
            *k = (p / mass * KEY_SCALE).round() as i64;
        }
        match self.index.get(&self.key) {
            Some(&slot) => {
                let dst = &mut self.data[slot * self.inputs..(slot + 1) * self.inputs];
                for (d, &p) in dst.iter_mut().zip(col) {
                    *d += p;
                }
            }
            None => {
                let slot = self.len();
                if slot >= self.cap {
                    return Err(Error::CapacityExceeded {
                        columns: slot + 1,
                        cap: self.cap,
                        path: String::new(),
                    });
                }
                self.index.insert(self.key.clone(), slot);
                self.data.extend_from_slice(col);
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Table {
        let inputs = self.inputs;
        let count = self.len();
        let cols: Vec<&[f64]> = self.data.chunks_exact(inputs).collect();
        let masses: Vec<f64> = cols.iter().map(|c| c.iter().sum()).collect();
        let normalized: Vec<Vec<f64>> = cols
            .iter()
            .zip(&masses)
            .map(|(c, &m)| c.iter().map(|p| p / m).collect())
            .collect();

        // Single-linkage clustering within MERGE_TOL, using a projection to
        // restrict comparisons to a narrow window. Logarithms of distinct
        // primes have no rational linear relations, so structured columns
        // (e.g. palindromic ones) do not collapse onto one projection.
        let weights: Vec<f64> = (2..)
            .filter(|&p| crate::field::is_prime(p))
            .take(inputs)
            .map(|p| (p as f64).ln())
            .collect();
        let wsum: f64 = weights.iter().sum();
        let proj: Vec<f64> = normalized
            .iter()
            .map(|v| v.iter().zip(&weights).map(|(a, w)| a * w).sum())
            .collect();
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
        let mut parent: Vec<usize> = (0..count).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let window = MERGE_TOL * wsum;
        for (pos, &i) in order.iter().enumerate() {
            for &j in &order[pos + 1..] {
                if proj[j] - proj[i] > window {
                    break;
                }
                let close = normalized[i]
                    .iter()
                    .zip(&normalized[j])
                    .all(|(a, b)| (a - b).abs() <= MERGE_TOL);
                if close {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }

        let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
        let mut merged: Vec<Vec<f64>> = Vec::new();
        for i in 0..count {
            let r = find(&mut parent, i);
            let slot = *slot_of_root.entry(r).or_insert_with(|| {
                merged.push(vec![0.0; inputs]);
                merged.len() - 1
            });
            for (d, &p) in merged[slot].iter_mut().zip(cols[i]) {
                *d += p;
            }
        }

        let mut keyed: Vec<(Vec<f64>, f64, Vec<f64>)> = merged
            .into_iter()
            .map(|c| {
                let m: f64 = c.iter().sum();
                (c.iter().map(|p| p / m).collect(), m, c)
            })
            .collect();
        keyed.sort_by(|a, b| lex_cmp(&a.0, &b.0).then(a.1.total_cmp(&b.1)));
        let data = keyed.into_iter().flat_map(|(_, _, c)| c).collect();
        Table::from_columns(inputs, data)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// A two-user MAC with inputs in GF(q) x GF(q). Input pair `(x, w)` is row
/// `x * q + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mac {
    field: Field,
    table: Table,
    labels: Option<Vec<String>>,
}

/// A single-user channel with inputs in GF(q).
#[derive(Clone, Debug, PartialEq)]
pub struct PointChannel {
    field: Field,
    table: Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremalKind {
    Useless,
    User1Perfect,
    User2Perfect,
    Contention,
    Perfect,
}

impl ExtremalKind {
    pub const ALL: [ExtremalKind; 5] = [
        ExtremalKind::Useless,
        ExtremalKind::User1Perfect,
        ExtremalKind::User2Perfect,
        ExtremalKind::Contention,
        ExtremalKind::Perfect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExtremalKind::Useless => "useless",
            ExtremalKind::User1Perfect => "user1-perfect",
            ExtremalKind::User2Perfect => "user2-perfect",
            ExtremalKind::Contention => "contention",
            ExtremalKind::Perfect => "perfect",
        }
    }
}

impl Mac {
    /// Validate a table given as one row per `(x, w)` pair in lexicographic
    /// order.
    pub fn from_rows(q: usize, rows: &[Vec<f64>]) -> Result<Mac> {
        let field = Field::new(q)?;
        if rows.len() != q * q {
            return Err(Error::validation(format!(
                "expected {} rows for q={}, got {}",
                q * q,
                q,
                rows.len()
            )));
        }
        let table = Table::from_rows(rows, |r| format!("(x={}, w={})", r / q, r % q))?;
        Ok(Mac {
            field,
            table,
            labels: None,
        })
    }

    pub fn from_fn(
        q: usize,
        outputs: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Mac> {
        let rows: Vec<Vec<f64>> = (0..q * q)
            .map(|r| (0..outputs).map(|y| f(r / q, r % q, y)).collect())
            .collect();
        Mac::from_rows(q, &rows)
    }

    pub(crate) fn from_table(field: Field, table: Table) -> Mac {
        debug_assert_eq!(table.inputs(), field.q() * field.q());
        Mac {
            field,
            table,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Mac> {
        if labels.len() != self.outputs() {
            return Err(Error::validation("label count does not match output count"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Integer-sum MAC `Y = x + w` over `{0, .., 2(q-1)}`; with probability
    /// `flip_prob` the output is replaced by a uniformly chosen other symbol.
    pub fn adder(q: usize, flip_prob: f64) -> Result<Mac> {
        if !(0.0..1.0).contains(&flip_prob) {
            return Err(Error::validation(format!(
                "flip_prob {flip_prob} not in [0,1)"
            )));
        }
        let outputs = 2 * q - 1;
        let other = flip_prob / (outputs - 1) as f64;
        let mac = Mac::from_fn(
            q,
            outputs,
            |x, w, y| if y == x + w { 1.0 - flip_prob } else { other },
        )?;
        let labels = (0..outputs).map(|y| y.to_string()).collect();
        mac.with_labels(labels)
    }

    /// One representative channel of each extremal class. For `q = 2` the
    /// triples are exactly (0,0,0), (1,0,1), (0,1,1), (1,1,1) and (1,1,2).
    pub fn extremal(kind: ExtremalKind, q: usize) -> Result<Mac> {
        let field = Field::new(q)?;
        match kind {
            ExtremalKind::Useless => Mac::from_fn(q, 1, |_, _, _| 1.0),
            ExtremalKind::User1Perfect => Mac::from_fn(q, q, |x, _, y| (y == x) as u8 as f64),
            ExtremalKind::User2Perfect => Mac::from_fn(q, q, |_, w, y| (y == w) as u8 as f64),
            ExtremalKind::Contention => Mac::from_fn(q, q, |x, w, y| {
                (y == field.add_unchecked(x, w)) as u8 as f64
            }),
            ExtremalKind::Perfect => {
                Mac::from_fn(q, q * q, |x, w, y| (y == x * q + w) as u8 as f64)
            }
        }
    }

    /// Random MAC with i.i.d. exponential weights per row; each entry is
    /// zeroed with probability `sparsity` (one entry per row is always kept).
    pub fn random<R: Rng + ?Sized>(
        q: usize,
        outputs: usize,
        sparsity: f64,
        rng: &mut R,
    ) -> Result<Mac> {
        let rows: Vec<Vec<f64>> = (0..q * q)
            .map(|_| random_row(outputs, sparsity, rng))
            .collect();
        Mac::from_rows(q, &rows)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn outputs(&self) -> usize {
        self.table.outputs()
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize, w: usize) -> f64 {
        self.table.prob(y, x * self.q() + w)
    }

    pub fn canonical(&self) -> Mac {
        Mac::from_table(self.field, self.table.canonical())
    }

    pub fn equivalent(&self, other: &Mac) -> bool {
        self.q() == other.q()
            && self
                .canonical()
                .table
                .approx_eq(&other.canonical().table, EQUIV_TOL)
    }

    pub fn to_spec(&self) -> ChannelSpecFile {
        ChannelSpecFile {
            q: self.q(),
            outputs: self.outputs(),
            probs: self.table.rows(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_spec(spec: &ChannelSpecFile) -> Result<Mac> {
        let mac = Mac::from_rows(spec.q, &spec.probs)?;
        if mac.outputs() != spec.outputs {
            return Err(Error::validation(format!(
                "\"outputs\" is {} but rows have {} entries",
                spec.outputs,
                mac.outputs()
            )));
        }
        match &spec.labels {
            Some(l) => mac.with_labels(l.clone()),
            None => Ok(mac),
        }
    }

    pub fn load_json(path: &Path) -> Result<Mac> {
        let text = std::fs::read_to_string(path)?;
        let spec: ChannelSpecFile = serde_json::from_str(&text)?;
        Mac::from_spec(&spec)
    }
}

impl PointChannel {
    pub fn from_rows(q: usize, rows: &[Vec<f64>]) -> Result<PointChannel> {
        let field = Field::new(q)?;
        if rows.len() != q {
            return Err(Error::validation(format!(
                "expected {} rows, got {}",
                q,
                rows.len()
            )));
        }
        let table = Table::from_rows(rows, |r| format!("(x={r})"))?;
        Ok(PointChannel { field, table })
    }

    pub fn from_fn(
        q: usize,
        outputs: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<PointChannel> {
        let rows: Vec<Vec<f64>> = (0..q)
            .map(|x| (0..outputs).map(|y| f(x, y)).collect())
            .collect();
        PointChannel::from_rows(q, &rows)
    }

    pub(crate) fn from_table(field: Field, table: Table) -> PointChannel {
        debug_assert_eq!(table.inputs(), field.q());
        PointChannel { field, table }
    }

    pub fn perfect(q: usize) -> Result<PointChannel> {
        PointChannel::from_fn(q, q, |x, y| (x == y) as u8 as f64)
    }

    pub fn constant(q: usize) -> Result<PointChannel> {
        PointChannel::from_fn(q, 1, |_, _| 1.0)
    }

    /// q-ary erasure channel: the input is seen with probability `1 - eps`.
    pub fn erasure(q: usize, eps: f64) -> Result<PointChannel> {
        PointChannel::from_fn(q, q + 1, |x, y| {
            if y == q {
                eps
            } else if y == x {
                1.0 - eps
            } else {
                0.0
            }
        })
    }

    pub fn random<R: Rng + ?Sized>(
        q: usize,
        outputs: usize,
        sparsity: f64,
        rng: &mut R,
    ) -> Result<PointChannel> {
        let rows: Vec<Vec<f64>> = (0..q).map(|_| random_row(outputs, sparsity, rng)).collect();
        PointChannel::from_rows(q, &rows)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn outputs(&self) -> usize {
        self.table.outputs()
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.table.prob(y, x)
    }

    pub fn canonical(&self) -> PointChannel {
        PointChannel::from_table(self.field, self.table.canonical())
    }

    pub fn equivalent(&self, other: &PointChannel) -> bool {
        self.q() == other.q()
            && self
                .canonical()
                .table
                .approx_eq(&other.canonical().table, EQUIV_TOL)
    }

    /// Output-alphabet mixture `sum_k p_k Q_k` of channels sharing `q` and
    /// output count.
    pub fn mixture(parts: &[(f64, &PointChannel)]) -> Result<PointChannel> {
        let first = parts
            .first()
            .ok_or_else(|| Error::validation("empty mixture"))?
            .1;
        let (q, outputs) = (first.q(), first.outputs());
        if parts
            .iter()
            .any(|(_, c)| c.q() != q || c.outputs() != outputs)
        {
            return Err(Error::validation(
                "mixture components must share q and outputs",
            ));
        }
        PointChannel::from_fn(q, outputs, |x, y| {
            parts.iter().map(|(p, c)| p * c.prob(y, x)).sum()
        })
    }
}

fn random_row<R: Rng + ?Sized>(outputs: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    let keep = rng.gen_range(0..outputs);
    let mut row: Vec<f64> = (0..outputs)
        .map(|y| {
            if y != keep && rng.gen::<f64>() < sparsity {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= s);
    row
}

/// On-disk channel description. Rows are indexed by `(x, w)` with `x` major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChannelSpecFile {
    pub q: usize,
    pub outputs: usize,
    pub probs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}
