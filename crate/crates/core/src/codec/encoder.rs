//! The polar transform `x = u B_n G_n` over GF(q).
//!
//! `B_n` is the bit-reversal permutation and `G_n` the `log2 n`-th Kronecker
//! power of `[1 0; 1 1]`. The encoder reverses the index bits of `u` and then
//! runs the in-place butterfly, `O(n log n)` field operations.

use crate::error::{Error, Result};
use crate::field::Field;

pub fn log2_exact(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::validation(format!(
            "length {n} is not a power of two"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

/// `perm[i]` is `i` with its `log2 n` binary digits reversed.
pub fn bit_reversal_perm(n: usize) -> Result<Vec<usize>> {
    let bits = log2_exact(n)?;
    Ok((0..n)
        .map(|i| {
            if bits == 0 {
                0
            } else {
                i.reverse_bits() >> (usize::BITS as usize - bits)
            }
        })
        .collect())
}

/// `v <- v G_n` in natural order, for any abelian group given by `add`.
pub(crate) fn butterfly(v: &mut [usize], add: impl Fn(usize, usize) -> usize) {
    let n = v.len();
    let mut half = n / 2;
    while half >= 1 {
        for block in (0..n).step_by(2 * half) {
            for j in block..block + half {
                v[j] = add(v[j], v[j + half]);
            }
        }
        half /= 2;
    }
}

pub fn polar_encode(u: &[usize], field: Field) -> Result<Vec<usize>> {
    let perm = bit_reversal_perm(u.len())?;
    for &s in u {
        field.check(s)?;
    }
    let mut x: Vec<usize> = perm.iter().map(|&p| u[p]).collect();
    butterfly(&mut x, |a, b| field.add_unchecked(a, b));
    Ok(x)
}

/// Inverse of [`polar_encode`].
pub fn polar_invert(x: &[usize], field: Field) -> Result<Vec<usize>> {
    let perm = bit_reversal_perm(x.len())?;
    let mut v = x.to_vec();
    let n = v.len();
    let mut half = n / 2;
    while half >= 1 {
        for block in (0..n).step_by(2 * half) {
            for j in block..block + half {
                v[j] = field.sub_unchecked(v[j], v[j + half]);
            }
        }
        half /= 2;
    }
    Ok(perm.iter().map(|&p| v[p]).collect())
}

/// Reference path: materialize `B_n` and `G_n` and multiply densely.
pub fn polar_encode_dense(u: &[usize], field: Field) -> Result<Vec<usize>> {
    let n = u.len();
    let perm = bit_reversal_perm(n)?;
    let mut g = vec![vec![1usize]];
    while g.len() < n {
        let m = g.len();
        let mut next = vec![vec![0usize; 2 * m]; 2 * m];
        // [1 0; 1 1] (x) g
        for (bi, bj) in [(0, 0), (1, 0), (1, 1)] {
            for i in 0..m {
                for j in 0..m {
                    next[bi * m + i][bj * m + j] = g[i][j];
                }
            }
        }
        g = next;
    }
    let mut b = vec![vec![0usize; n]; n];
    for i in 0..n {
        b[i][perm[i]] = 1;
    }
    let ub: Vec<usize> = (0..n)
        .map(|j| {
            (0..n).fold(0, |acc, i| {
                field.add_unchecked(acc, field.mul_unchecked(u[i], b[i][j]))
            })
        })
        .collect();
    Ok((0..n)
        .map(|j| {
            (0..n).fold(0, |acc, i| {
                field.add_unchecked(acc, field.mul_unchecked(ub[i], g[i][j]))
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bit_reversal_examples() {
        assert_eq!(bit_reversal_perm(1).unwrap(), vec![0]);
        assert_eq!(bit_reversal_perm(2).unwrap(), vec![0, 1]);
        assert_eq!(bit_reversal_perm(4).unwrap(), vec![0, 2, 1, 3]);
        assert_eq!(bit_reversal_perm(8).unwrap(), vec![0, 4, 2, 6, 1, 5, 3, 7]);
        assert!(bit_reversal_perm(6).is_err());
        assert!(bit_reversal_perm(0).is_err());
    }

    #[test]
    fn encode_examples() {
        let f2 = Field::new(2).unwrap();
        let f3 = Field::new(3).unwrap();
        assert_eq!(polar_encode(&[0; 8], f2).unwrap(), vec![0; 8]);
        assert_eq!(polar_encode(&[1, 0], f2).unwrap(), vec![1, 0]);
        assert_eq!(polar_encode(&[1, 1], f2).unwrap(), vec![0, 1]);
        assert_eq!(polar_encode(&[1, 2], f3).unwrap(), vec![0, 2]);
        assert!(polar_encode(&[2, 0], f2).is_err());
    }

    #[test]
    fn exhaustive_binary_agreement() {
        let f2 = Field::new(2).unwrap();
        for n in [1, 2, 4, 8] {
            for word in 0..(1usize << n) {
                let u: Vec<usize> = (0..n).map(|i| word >> i & 1).collect();
                assert_eq!(
                    polar_encode(&u, f2).unwrap(),
                    polar_encode_dense(&u, f2).unwrap()
                );
            }
        }
    }

    proptest! {
        #[test]
        fn matches_dense_reference(q in prop::sample::select(vec![2usize, 3, 5]), bits in 0usize..=4, seed in any::<u64>()) {
            let f = Field::new(q).unwrap();
            let n = 1 << bits;
            let u: Vec<usize> = (0..n).map(|i| (seed.rotate_left(i as u32 * 7) as usize ^ i) % q).collect();
            let x = polar_encode(&u, f).unwrap();
            prop_assert_eq!(&x, &polar_encode_dense(&u, f).unwrap());
            prop_assert_eq!(polar_invert(&x, f).unwrap(), u);
        }
    }
}
