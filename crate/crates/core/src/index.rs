//! Integer multi-indices on the lattice ℤ^d and ℓ¹-ball enumeration.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A Fourier mode label ν ∈ ℤ^d. Ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i32>);

impl MultiIndex {
    pub fn new(components: Vec<i32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit vector `sign * e_axis`.
    pub fn unit(dim: usize, axis: usize, sign: i32) -> Self {
        let mut v = vec![0; dim];
        v[axis] = sign;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// |ν|₁.
    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&c| c.unsigned_abs() as u64).sum()
    }

    pub fn dot(&self, omega: &[f64]) -> f64 {
        self.0.iter().zip(omega).map(|(&n, &w)| n as f64 * w).sum()
    }

    /// True when the first nonzero component is positive.
    pub fn is_canonical_sign(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }
}

impl From<Vec<i32>> for MultiIndex {
    fn from(v: Vec<i32>) -> Self {
        MultiIndex(v)
    }
}

impl<const D: usize> From<[i32; D]> for MultiIndex {
    fn from(v: [i32; D]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Number of lattice points ν ∈ ℤ^d with |ν|₁ ≤ radius (origin included).
///
/// Uses the Delannoy-type identity Σ_k 2^k C(d,k) C(r,k); saturates on overflow.
pub fn l1_ball_size(dim: usize, radius: u64) -> u128 {
    let mut total: u128 = 0;
    let mut binom_d: u128 = 1;
    let mut binom_r: u128 = 1;
    let mut pow2: u128 = 1;
    for k in 0..=dim as u64 {
        if k > 0 {
            binom_d = binom_d * (dim as u128 - k as u128 + 1) / k as u128;
            if k > radius {
                break;
            }
            binom_r = binom_r.saturating_mul(radius as u128 - k as u128 + 1) / k as u128;
            pow2 = pow2.saturating_mul(2);
        }
        total = total.saturating_add(pow2.saturating_mul(binom_d).saturating_mul(binom_r));
    }
    total
}

/// Visit every ν with |ν|₁ ≤ radius in lexicographic order.
///
/// The callback receives the components and |ν|₁.
pub fn for_each_in_l1_ball<F: FnMut(&[i32], u64)>(dim: usize, radius: u64, mut visit: F) {
    fn rec<F: FnMut(&[i32], u64)>(
        buf: &mut [i32],
        pos: usize,
        left: i64,
        used: u64,
        visit: &mut F,
    ) {
        if pos == buf.len() {
            visit(buf, used);
            return;
        }
        for c in -left..=left {
            buf[pos] = c as i32;
            let a = c.unsigned_abs();
            rec(buf, pos + 1, left - a as i64, used + a, visit);
        }
    }
    let mut buf = vec![0i32; dim];
    rec(&mut buf, 0, radius as i64, 0, &mut visit);
}

/// All nonzero ν with |ν|₁ ≤ radius, lexicographic.
pub fn l1_ball(dim: usize, radius: u64) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for_each_in_l1_ball(dim, radius, |nu, norm| {
        if norm > 0 {
            out.push(MultiIndex(nu.to_vec()));
        }
    });
    out
}
