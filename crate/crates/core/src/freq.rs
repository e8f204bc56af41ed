//! Frequency-vector arithmetic: smallest divisors α_n(ω), truncated Bryuno
//! sums and the dyadic scale index n(ν).
//!
//! All norms on ℤ^d are ℓ¹. The smallest divisors are exact minima over the
//! finite lattice ball 0 < |ν|₁ ≤ 2^n: the first d−1 coordinates are
//! enumerated exhaustively and the last one is minimised in closed form
//! (|ω·ν| is convex in ν_d, so the integer minimiser sits next to the real one).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::float;
use crate::index::{for_each_in_l1_ball, l1_ball_size, MultiIndex};

/// Default audit radius for the non-resonance check done at construction.
pub const DEFAULT_AUDIT_BOUND: u64 = 16;

/// Default cap on the number of enumerated prefix points in `divisor_table`.
pub const DEFAULT_SEARCH_CAP: u128 = 50_000_000;

/// The forcing frequency vector ω ∈ ℝ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    components: Vec<f64>,
    audit_bound: u64,
}

impl FrequencyVector {
    /// Builds ω and audits ω·ν ≠ 0 for every 0 < |ν|₁ ≤ [`DEFAULT_AUDIT_BOUND`].
    pub fn new(components: Vec<f64>) -> Result<Self> {
        Self::with_audit(components, DEFAULT_AUDIT_BOUND)
    }

    /// Builds ω with a caller-chosen audit radius; `0` skips the audit.
    pub fn with_audit(components: Vec<f64>, audit_bound: u64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidFrequency("empty frequency vector".into()));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFrequency("non-finite component".into()));
        }
        if components.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidFrequency("zero vector".into()));
        }
        let omega = FrequencyVector {
            components,
            audit_bound,
        };
        if audit_bound > 0 {
            let mut resonance = None;
            for_each_in_l1_ball(omega.dim(), audit_bound, |nu, norm| {
                if resonance.is_none() && norm > 0 && dot(nu, &omega.components) == 0.0 {
                    resonance = Some(nu.to_vec());
                }
            });
            if let Some(nu) = resonance {
                return Err(Error::ZeroDivisor { nu });
            }
        }
        Ok(omega)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn audit_bound(&self) -> u64 {
        self.audit_bound
    }

    /// ω·ν.
    pub fn divisor(&self, nu: &MultiIndex) -> f64 {
        nu.dot(&self.components)
    }
}

fn consider(slot: &mut Option<(f64, Vec<i32>)>, value: f64, nu: Vec<i32>) {
    let better = match slot {
        None => true,
        Some((v, cur)) => value < *v || (value == *v && nu < *cur),
    };
    if better {
        *slot = Some((value, nu));
    }
}

fn dot(nu: &[i32], omega: &[f64]) -> f64 {
    nu.iter().zip(omega).map(|(&n, &w)| n as f64 * w).sum()
}

/// Named frequency vectors: `golden`, `sqrt2`, `cubic`.
pub fn standard_frequency(name: &str) -> Result<FrequencyVector> {
    let components = match name {
        "golden" => vec![1.0, (1.0 + 5f64.sqrt()) / 2.0],
        "sqrt2" => vec![1.0, 2f64.sqrt()],
        "cubic" => vec![1.0, 2f64.cbrt(), 4f64.cbrt()],
        other => return Err(Error::UnknownName(other.to_string())),
    };
    FrequencyVector::new(components)
}

/// One row of a [`DivisorTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorEntry {
    pub n: usize,
    pub alpha: f64,
    /// Minimising ν, first nonzero component positive, lexicographically
    /// smallest among ties.
    pub minimizer: MultiIndex,
}

/// The table α_0(ω), …, α_N(ω) with minimisers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorTable {
    pub omega: FrequencyVector,
    pub entries: Vec<DivisorEntry>,
}

impl DivisorTable {
    /// Computes α_n for n = 0..=n_max with the default search cap.
    pub fn compute(omega: &FrequencyVector, n_max: usize) -> Result<Self> {
        Self::compute_with_cap(omega, n_max, DEFAULT_SEARCH_CAP)
    }

    pub fn compute_with_cap(omega: &FrequencyVector, n_max: usize, cap: u128) -> Result<Self> {
        if n_max >= 62 {
            return Err(Error::BudgetExceeded {
                needed: u128::MAX,
                cap,
            });
        }
        let d = omega.dim();
        let radius = 1u64 << n_max;
        let needed = l1_ball_size(d - 1, radius);
        if needed > cap {
            return Err(Error::BudgetExceeded { needed, cap });
        }
        let w = omega.components();
        let w_last = w[d - 1];
        let mut best: Vec<Option<(f64, Vec<i32>)>> = vec![None; n_max + 1];

        for_each_in_l1_ball(d - 1, radius, |prefix, used| {
            let first = prefix.iter().find(|&&c| c != 0);
            if matches!(first, Some(&c) if c < 0) {
                return;
            }
            let partial = dot(prefix, w);
            let start = scale_of_norm(used.max(1));
            for (m, slot) in best.iter_mut().enumerate().skip(start) {
                let room = (1i64 << m) - used as i64;
                if first.is_none() {
                    // prefix is zero: ν = (0, …, 0, 1)
                    let mut nu = prefix.to_vec();
                    nu.push(1);
                    consider(slot, w_last.abs(), nu);
                    continue;
                }
                let mut candidates = Vec::with_capacity(3);
                if w_last == 0.0 {
                    candidates.push(0);
                } else {
                    let target = (-partial / w_last).round() as i64;
                    for t in [target - 1, target, target + 1] {
                        let t = t.clamp(-room, room);
                        if !candidates.contains(&t) {
                            candidates.push(t);
                        }
                    }
                    candidates.sort_unstable();
                }
                for t in candidates {
                    let value = (partial + t as f64 * w_last).abs();
                    let mut nu = prefix.to_vec();
                    nu.push(t as i32);
                    consider(slot, value, nu);
                }
            }
        });

        let mut entries = Vec::with_capacity(n_max + 1);
        for (n, slot) in best.into_iter().enumerate() {
            let (alpha, nu) = slot.expect("ball always contains a unit vector");
            if alpha == 0.0 {
                return Err(Error::ZeroDivisor { nu });
            }
            entries.push(DivisorEntry {
                n,
                alpha,
                minimizer: MultiIndex::new(nu),
            });
        }
        Ok(DivisorTable {
            omega: omega.clone(),
            entries,
        })
    }

    pub fn depth(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn alpha(&self, n: usize) -> Option<f64> {
        self.entries.get(n).map(|e| e.alpha)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    /// CSV rows `n,alpha_n,nu_1,...,nu_d` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,alpha_n");
        for i in 1..=self.omega.dim() {
            write!(out, ",nu_{i}").unwrap();
        }
        out.push('\n');
        for e in &self.entries {
            write!(out, "{},{}", e.n, float(e.alpha)).unwrap();
            for c in e.minimizer.components() {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// α_n(ω) = min{|ω·ν| : 0 < |ν|₁ ≤ 2^n}.
pub fn alpha_n(omega: &FrequencyVector, n: usize) -> Result<f64> {
    Ok(DivisorTable::compute(omega, n)?.entries[n].alpha)
}

/// Truncated Bryuno sum with its final increment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BryunoPartial {
    pub sum: f64,
    pub last_increment: f64,
}

/// Σ_{n=0}^{N} 2^{−n} log(1/α_n(ω)).
pub fn bryuno_partial(omega: &FrequencyVector, n_max: usize) -> Result<BryunoPartial> {
    let table = DivisorTable::compute(omega, n_max)?;
    Ok(bryuno_from_table(&table, n_max))
}

/// Partial sum over the first `n_max + 1` rows of an existing table.
pub fn bryuno_from_table(table: &DivisorTable, n_max: usize) -> BryunoPartial {
    let mut sum = 0.0;
    let mut last = 0.0;
    for e in table.entries.iter().take(n_max + 1) {
        last = (1.0 / e.alpha).ln() / (1u64 << e.n) as f64;
        sum += last;
    }
    BryunoPartial {
        sum,
        last_increment: last,
    }
}

fn scale_of_norm(norm: u64) -> usize {
    let mut n = 0;
    while (1u64 << n) < norm {
        n += 1;
    }
    n
}

/// n(ν) = least n ≥ 0 with |ν|₁ ≤ 2^n.
pub fn scale_index(nu: &MultiIndex) -> Result<usize> {
    if nu.is_zero() {
        return Err(Error::ZeroIndex);
    }
    Ok(scale_of_norm(nu.l1()))
}
