//! Joint successive-cancellation decoding of both users.

use crate::channel::Mac;
use crate::codec::construct::CodeSpec;
use crate::codec::sc::{argmax, Group, ScEngine};
use crate::error::{Error, Result};

/// Decoded source vectors of both users (0-based positions).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointDecision {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

/// Outcome of a paired genie-aided and standalone pass on one output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorTrace {
    pub decision: JointDecision,
    /// Indices (0-based) where the genie-aided decision was wrong.
    pub genie_errors: Vec<usize>,
    /// First index where the standalone decision was wrong.
    pub first_standalone_error: Option<usize>,
}

/// Decision rule at one index. A frozen coordinate is set to its known value
/// and the other coordinate is decided conditionally on it.
fn decide(post: &[f64], q: usize, fu: Option<usize>, fv: Option<usize>) -> usize {
    match (fu, fv) {
        (Some(a), Some(b)) => a * q + b,
        (Some(a), None) => a * q + argmax(&post[a * q..(a + 1) * q]),
        (None, Some(b)) => {
            let mut best = 0;
            for a in 1..q {
                if post[a * q + b] > post[best * q + b] {
                    best = a;
                }
            }
            best * q + b
        }
        (None, None) => argmax(post),
    }
}

/// Per-thread decoder for one code and channel.
pub struct JointDecoder<'a> {
    mac: &'a Mac,
    q: usize,
    n: usize,
    frozen: Vec<(Option<usize>, Option<usize>)>,
    engine: ScEngine,
}

impl<'a> JointDecoder<'a> {
    pub fn new(spec: &CodeSpec, mac: &'a Mac) -> Result<Self> {
        spec.validate()?;
        if spec.q != mac.q() {
            return Err(Error::validation(format!(
                "code is over GF({}) but channel over GF({})",
                spec.q,
                mac.q()
            )));
        }
        let frozen = (1..=spec.n)
            .map(|i| {
                (
                    spec.frozen_u.get(&i).copied(),
                    spec.frozen_v.get(&i).copied(),
                )
            })
            .collect();
        Ok(JointDecoder {
            mac,
            q: spec.q,
            n: spec.n,
            frozen,
            engine: ScEngine::new(Group::pair(mac.field()), spec.n)?,
        })
    }

    fn check(&self, y: &[usize]) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::validation(format!(
                "expected {} outputs, got {}",
                self.n,
                y.len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&s| s >= self.mac.outputs()) {
            return Err(Error::validation(format!(
                "output symbol {bad} out of range"
            )));
        }
        Ok(())
    }

    /// Run the recursion; `leaf(i, posterior, decision)` picks the symbol to
    /// propagate at index `i` (0-based).
    fn pass(&mut self, y: &[usize], leaf: &mut dyn FnMut(usize, &[f64], usize) -> usize) {
        let (mac, q, frozen) = (self.mac, self.q, &self.frozen);
        self.engine.run(
            |j, dst| {
                for (s, p) in dst.iter_mut().enumerate() {
                    *p = mac.prob(y[j], s / q, s % q);
                }
            },
            &mut |i, post| {
                let (fu, fv) = frozen[i];
                leaf(i, post, decide(post, q, fu, fv))
            },
        );
    }

    fn split(&self, symbols: Vec<usize>) -> JointDecision {
        let q = self.q;
        JointDecision {
            u: symbols.iter().map(|s| s / q).collect(),
            v: symbols.iter().map(|s| s % q).collect(),
        }
    }

    pub fn decode(&mut self, y: &[usize]) -> Result<JointDecision> {
        self.check(y)?;
        let mut symbols = vec![0; self.n];
        self.pass(y, &mut |i, _, d| {
            symbols[i] = d;
            d
        });
        Ok(self.split(symbols))
    }

    /// Decode and also return the normalized joint posterior at every index.
    /// With `genie = Some((u, v))` the true symbols are fed forward instead of
    /// the decisions.
    pub fn posteriors(
        &mut self,
        y: &[usize],
        genie: Option<(&[usize], &[usize])>,
    ) -> Result<Vec<Vec<f64>>> {
        self.check(y)?;
        let q = self.q;
        let mut out = vec![Vec::new(); self.n];
        self.pass(y, &mut |i, post, d| {
            out[i] = post.to_vec();
            genie.map_or(d, |(u, v)| u[i] * q + v[i])
        });
        Ok(out)
    }

    /// Standalone decoding plus a genie-aided pass with the true sources.
    pub fn trace(&mut self, y: &[usize], u: &[usize], v: &[usize]) -> Result<ErrorTrace> {
        self.check(y)?;
        let q = self.q;
        let mut genie_errors = Vec::new();
        self.pass(y, &mut |i, _, d| {
            let truth = u[i] * q + v[i];
            if d != truth {
                genie_errors.push(i);
            }
            truth
        });
        let mut symbols = vec![0; self.n];
        let mut first = None;
        self.pass(y, &mut |i, _, d| {
            if first.is_none() && d != u[i] * q + v[i] {
                first = Some(i);
            }
            symbols[i] = d;
            d
        });
        Ok(ErrorTrace {
            decision: self.split(symbols),
            genie_errors,
            first_standalone_error: first,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ExtremalKind;
    use crate::codec::encoder::polar_encode;
    use std::collections::BTreeMap;

    fn spec(
        q: usize,
        depth: usize,
        frozen_u: BTreeMap<usize, usize>,
        frozen_v: BTreeMap<usize, usize>,
    ) -> CodeSpec {
        let n = 1 << depth;
        CodeSpec {
            q,
            n,
            depth,
            a_u: (1..=n).filter(|i| !frozen_u.contains_key(i)).collect(),
            a_v: (1..=n).filter(|i| !frozen_v.contains_key(i)).collect(),
            frozen_u,
            frozen_v,
            lambda: 0.5,
            epsilon: 0.1,
            seed: 0,
            mode: crate::polarizer::Mode::Exact,
            pe_threshold: 1e-3,
            union_bound: 0.0,
            union_bound_exact: true,
            reliability: Vec::new(),
        }
    }

    #[test]
    fn adder_single_use() {
        let mac = Mac::adder(2, 0.0).unwrap();
        let s = spec(2, 0, BTreeMap::new(), BTreeMap::new());
        let mut dec = JointDecoder::new(&s, &mac).unwrap();
        assert_eq!(
            dec.decode(&[0]).unwrap(),
            JointDecision {
                u: vec![0],
                v: vec![0]
            }
        );
        assert_eq!(
            dec.decode(&[2]).unwrap(),
            JointDecision {
                u: vec![1],
                v: vec![1]
            }
        );
        assert_eq!(
            dec.decode(&[1]).unwrap(),
            JointDecision {
                u: vec![0],
                v: vec![1]
            }
        );
        assert!(dec.decode(&[3]).is_err());
        assert!(dec.decode(&[0, 1]).is_err());
    }

    #[test]
    fn frozen_coordinate_conditions_the_other() {
        let mac = Mac::adder(2, 0.0).unwrap();
        let s = spec(2, 0, BTreeMap::from([(1, 1)]), BTreeMap::new());
        let mut dec = JointDecoder::new(&s, &mac).unwrap();
        assert_eq!(
            dec.decode(&[1]).unwrap(),
            JointDecision {
                u: vec![1],
                v: vec![0]
            }
        );
    }

    #[test]
    fn perfect_mac_recovers_everything() {
        let mac = Mac::extremal(ExtremalKind::Perfect, 3).unwrap();
        let f = mac.field();
        let s = spec(3, 3, BTreeMap::new(), BTreeMap::new());
        let mut dec = JointDecoder::new(&s, &mac).unwrap();
        let u: Vec<usize> = (0..8).map(|i| (i * 2 + 1) % 3).collect();
        let v: Vec<usize> = (0..8).map(|i| (i * i) % 3).collect();
        let x = polar_encode(&u, f).unwrap();
        let w = polar_encode(&v, f).unwrap();
        // Perfect channel outputs the pair (x, w) as x * q + w.
        let y: Vec<usize> = x.iter().zip(&w).map(|(a, b)| a * 3 + b).collect();
        assert_eq!(dec.decode(&y).unwrap(), JointDecision { u, v });
    }
}
