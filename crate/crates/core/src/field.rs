//! Arithmetic in the prime field GF(q).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A prime modulus. Elements are plain `usize` values in `[0, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Field {
    q: usize,
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(q: usize) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Field { q })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn check(&self, a: usize) -> Result<usize> {
        if a < self.q {
            Ok(a)
        } else {
            Err(Error::ElementOutOfRange {
                value: a,
                q: self.q,
            })
        }
    }

    pub fn add(&self, a: usize, b: usize) -> Result<usize> {
        Ok(self.add_unchecked(self.check(a)?, self.check(b)?))
    }

    pub fn sub(&self, a: usize, b: usize) -> Result<usize> {
        Ok(self.sub_unchecked(self.check(a)?, self.check(b)?))
    }

    pub fn mul(&self, a: usize, b: usize) -> Result<usize> {
        Ok(self.mul_unchecked(self.check(a)?, self.check(b)?))
    }

    pub fn inv(&self, a: usize) -> Result<usize> {
        let a = self.check(a)?;
        if a == 0 {
            return Err(Error::NoInverse);
        }
        // Fermat: a^(q-2)
        let mut result = 1;
        let mut base = a;
        let mut exp = self.q - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul_unchecked(result, base);
            }
            base = self.mul_unchecked(base, base);
            exp >>= 1;
        }
        Ok(result)
    }

    #[inline]
    pub fn add_unchecked(&self, a: usize, b: usize) -> usize {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub_unchecked(&self, a: usize, b: usize) -> usize {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg_unchecked(&self, a: usize) -> usize {
        self.sub_unchecked(0, a)
    }

    #[inline]
    pub fn mul_unchecked(&self, a: usize, b: usize) -> usize {
        (a * b) % self.q
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.q
    }
}

impl TryFrom<usize> for Field {
    type Error = Error;
    fn try_from(q: usize) -> Result<Self> {
        Field::new(q)
    }
}

impl From<Field> for usize {
    fn from(f: Field) -> usize {
        f.q
    }
}
