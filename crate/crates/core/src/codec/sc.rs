//! Successive-cancellation recursion over a finite abelian group.
//!
//! The same recursion serves the single-user decoders (group GF(q)) and the
//! joint decoder (group GF(q) x GF(q), symbol `u * q + v`). At each node the
//! check update is the minus synthesis and the variable update the plus
//! synthesis, applied pointwise to likelihood vectors. Vectors are normalized
//! to sum one at every node.

use crate::codec::encoder::bit_reversal_perm;
use crate::error::Result;
use crate::field::Field;

/// Addition table of a finite abelian group with `size` elements.
#[derive(Clone, Debug)]
pub struct Group {
    size: usize,
    add: Vec<usize>,
}

impl Group {
    pub fn field(field: Field) -> Group {
        let q = field.q();
        let add = (0..q * q)
            .map(|k| field.add_unchecked(k / q, k % q))
            .collect();
        Group { size: q, add }
    }

    /// GF(q) x GF(q) with symbol `u * q + v`.
    pub fn pair(field: Field) -> Group {
        let q = field.q();
        let m = q * q;
        let mut add = vec![0; m * m];
        for a in 0..m {
            for b in 0..m {
                add[a * m + b] =
                    field.add_unchecked(a / q, b / q) * q + field.add_unchecked(a % q, b % q);
            }
        }
        Group { size: m, add }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.size + b]
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        let inv = 1.0 / s;
        v.iter_mut().for_each(|p| *p *= inv);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|p| *p = u);
    }
}

/// Reusable SC workspace for one block length.
#[derive(Clone, Debug)]
pub struct ScEngine {
    group: Group,
    n: usize,
    rev: Vec<usize>,
    lik: Vec<f64>,
    scratch: Vec<f64>,
    leaf: Vec<f64>,
    partial: Vec<usize>,
}

/// Output of one SC pass, in decoding (natural) order.
#[derive(Clone, Debug, Default)]
pub struct ScOutput {
    /// Symbol propagated at each index (the decision, or the genie's value).
    pub symbols: Vec<usize>,
    /// Re-encoded codeword in channel order.
    pub codeword: Vec<usize>,
}

impl ScEngine {
    pub fn new(group: Group, n: usize) -> Result<ScEngine> {
        let rev = bit_reversal_perm(n)?;
        let m = group.size();
        Ok(ScEngine {
            group,
            n,
            rev,
            lik: vec![0.0; n * m],
            scratch: vec![0.0; n * m],
            leaf: vec![0.0; m],
            partial: vec![0; n],
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Run one pass. `channel_lik(j, out)` fills the likelihood vector of
    /// channel position `j`; `leaf(i, posterior)` returns the symbol to
    /// propagate at 0-based index `i` given its normalized posterior.
    pub fn run(
        &mut self,
        mut channel_lik: impl FnMut(usize, &mut [f64]),
        leaf: &mut dyn FnMut(usize, &[f64]) -> usize,
    ) -> ScOutput {
        let m = self.group.size();
        let n = self.n;
        // Position k of the natural-order recursion observes channel use rev[k].
        for k in 0..n {
            let dst = &mut self.lik[k * m..(k + 1) * m];
            channel_lik(self.rev[k], dst);
        }
        let mut symbols = vec![0; n];
        let mut ctx = Ctx {
            group: &self.group,
            leaf_buf: &mut self.leaf,
            leaf,
        };
        ctx.recurse(
            &self.lik,
            n,
            &mut self.scratch,
            0,
            &mut symbols,
            &mut self.partial,
        );
        let codeword = (0..n).map(|j| self.partial[self.rev[j]]).collect();
        ScOutput { symbols, codeword }
    }
}

struct Ctx<'a, 'b> {
    group: &'a Group,
    leaf_buf: &'a mut [f64],
    leaf: &'b mut dyn FnMut(usize, &[f64]) -> usize,
}

impl Ctx<'_, '_> {
    fn recurse(
        &mut self,
        lik: &[f64],
        n: usize,
        scratch: &mut [f64],
        base: usize,
        symbols: &mut [usize],
        partial: &mut [usize],
    ) {
        let m = self.group.size();
        if n == 1 {
            self.leaf_buf.copy_from_slice(&lik[..m]);
            normalize(self.leaf_buf);
            let s = (self.leaf)(base, self.leaf_buf);
            symbols[0] = s;
            partial[0] = s;
            return;
        }
        let half = n / 2;
        let (cur, rest) = scratch.split_at_mut(half * m);
        let (first, second) = lik.split_at(half * m);

        // Check node: the minus synthesis.
        for j in 0..half {
            let l1 = &first[j * m..(j + 1) * m];
            let l2 = &second[j * m..(j + 1) * m];
            let out = &mut cur[j * m..(j + 1) * m];
            for (a, o) in out.iter_mut().enumerate() {
                let row = &self.group.add[a * m..(a + 1) * m];
                *o = row.iter().zip(l2).map(|(&idx, &p2)| l1[idx] * p2).sum();
            }
            normalize(out);
        }
        let (sym_a, sym_b) = symbols.split_at_mut(half);
        let (part_a, part_b) = partial.split_at_mut(half);
        self.recurse(cur, half, rest, base, sym_a, part_a);

        // Variable node: the plus synthesis given the re-encoded first half.
        for j in 0..half {
            let l1 = &first[j * m..(j + 1) * m];
            let l2 = &second[j * m..(j + 1) * m];
            let a = part_a[j];
            let row = &self.group.add[a * m..(a + 1) * m];
            let out = &mut cur[j * m..(j + 1) * m];
            for t in 0..m {
                out[t] = l1[row[t]] * l2[t];
            }
            normalize(out);
        }
        self.recurse(cur, half, rest, base + half, sym_b, part_b);

        for j in 0..half {
            part_a[j] = self.group.add(part_a[j], part_b[j]);
        }
    }
}

/// Index of the first maximum (smallest symbol wins ties).
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate().skip(1) {
        if p > v[best] {
            best = i;
        }
    }
    best
}
