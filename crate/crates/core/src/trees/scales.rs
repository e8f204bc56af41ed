use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{DivisorTable, FrequencyVector};

use super::tree::Tree;

/// Depth of the α table built by [`assign_scales`] and [`CutoffFamily::new`].
pub const DEFAULT_SCALE_DEPTH: usize = 10;

/// h(t) = e^{−1/t} for t > 0, else 0.
fn glue(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step B(t) = h(t)/(h(t) + h(1 − t)): 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let (a, b) = (glue(t), glue(1.0 - t));
    (a / (a + b)).clamp(0.0, 1.0)
}

/// ψ(u) = B(2u − 1): 0 for u ≤ 1/2, 1 for u ≥ 1, smooth and non-decreasing.
pub fn psi(u: f64) -> f64 {
    smooth_step(2.0 * u - 1.0)
}

/// χ = 1 − ψ.
pub fn chi(u: f64) -> f64 {
    1.0 - psi(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// ψ_n(|x|) = ψ(|x|/4α_n).
    PsiN(usize),
    /// χ_n(|x|) = χ(|x|/4α_n).
    ChiN(usize),
    /// Ξ_n = χ_0 ⋯ χ_n.
    Xi(usize),
    /// Ψ_n = χ_0 ⋯ χ_{n−1} ψ_n.
    Psi(usize),
    /// Ψ_{j,n} = χ_j ⋯ χ_{n−1} ψ_n for n ≥ j.
    PsiJ(usize, usize),
}

/// The cutoff functions built on the α table of a frequency vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffFamily {
    table: DivisorTable,
}

impl CutoffFamily {
    pub fn new(omega: &FrequencyVector) -> Result<Self> {
        Ok(CutoffFamily {
            table: DivisorTable::compute(omega, DEFAULT_SCALE_DEPTH)?,
        })
    }

    pub fn from_table(table: DivisorTable) -> Self {
        CutoffFamily { table }
    }

    pub fn table(&self) -> &DivisorTable {
        &self.table
    }

    pub fn depth(&self) -> usize {
        self.table.depth()
    }

    fn alpha(&self, n: usize) -> Result<f64> {
        self.table.alpha(n).ok_or(Error::DepthExceeded {
            requested: n,
            available: self.depth(),
        })
    }

    pub fn psi_n(&self, n: usize, x: f64) -> Result<f64> {
        Ok(psi(x.abs() / (4.0 * self.alpha(n)?)))
    }

    pub fn chi_n(&self, n: usize, x: f64) -> Result<f64> {
        Ok(chi(x.abs() / (4.0 * self.alpha(n)?)))
    }

    fn chi_product(&self, from: usize, to: usize, x: f64) -> Result<f64> {
        (from..to).try_fold(1.0, |acc, i| Ok(acc * self.chi_n(i, x)?))
    }

    pub fn xi(&self, n: usize, x: f64) -> Result<f64> {
        self.chi_product(0, n + 1, x)
    }

    /// Ξ_n(x) ≠ 0, decided on the support |x| < 4α_n rather than by
    /// evaluating the product, which rounds to zero just inside the edge.
    pub fn xi_nonzero(&self, n: usize, x: f64) -> Result<bool> {
        Ok(x.abs() < 4.0 * self.alpha(n)?)
    }

    pub fn big_psi(&self, n: usize, x: f64) -> Result<f64> {
        self.psi_j(0, n, x)
    }

    pub fn psi_j(&self, j: usize, n: usize, x: f64) -> Result<f64> {
        if n < j {
            return Err(Error::Precondition(format!("Psi_{{{j},{n}}} needs n >= j")));
        }
        Ok(self.chi_product(j, n, x)? * self.psi_n(n, x)?)
    }

    pub fn eval(&self, kind: CutoffKind, x: f64) -> Result<f64> {
        let v = match kind {
            CutoffKind::PsiN(n) => self.psi_n(n, x)?,
            CutoffKind::ChiN(n) => self.chi_n(n, x)?,
            CutoffKind::Xi(n) => self.xi(n, x)?,
            CutoffKind::Psi(n) => self.big_psi(n, x)?,
            CutoffKind::PsiJ(j, n) => self.psi_j(j, n, x)?,
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Σ_{n=j}^{depth} Ψ_{j,n}(x). Terms vanish once χ_n(|x|) = 0, so the sum
    /// is exact when |x| ≥ 4α_depth; otherwise the table is too shallow.
    pub fn partition_sum(&self, j: usize, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Precondition(
                "partition of unity needs x != 0".into(),
            ));
        }
        let mut sum = 0.0;
        let mut prefix = 1.0;
        for n in j..=self.depth() {
            sum += prefix * self.psi_n(n, x)?;
            prefix *= self.chi_n(n, x)?;
            if prefix == 0.0 {
                return Ok(sum);
            }
        }
        Err(Error::DepthExceeded {
            requested: self.depth() + 1,
            available: self.depth(),
        })
    }
}

pub fn cutoff_eval(family: &CutoffFamily, kind: CutoffKind, x: f64) -> Result<f64> {
    family.eval(kind, x)
}

/// Threshold factor of the sharp scale rule: ψ_n(|x|) ≠ 0 iff |x| > 2α_n.
pub const SUPPORT_FACTOR: f64 = 2.0;

/// Threshold factor under which a line of scale ≥ n has |x| ≤ α_{n−1}/4.
pub const QUARTER_FACTOR: f64 = 0.25;

/// n = min{n : |x| > 2α_n}, the first scale where ψ_n(|x|) ≠ 0.
pub fn sharp_scale(table: &DivisorTable, x: f64) -> Result<usize> {
    scale_with_factor(table, x, SUPPORT_FACTOR)
}

/// n = min{n : |x| > factor·α_n}.
pub fn scale_with_factor(table: &DivisorTable, x: f64, factor: f64) -> Result<usize> {
    let x = x.abs();
    table
        .entries
        .iter()
        .find(|e| x > factor * e.alpha)
        .map(|e| e.n)
        .ok_or(Error::DivisorTooSmall {
            divisor: x,
            depth: table.depth(),
        })
}

/// Labels every line with its sharp scale using a table of default depth.
pub fn assign_scales(theta: &Tree, omega: &FrequencyVector) -> Result<Tree> {
    assign_scales_with(theta, &DivisorTable::compute(omega, DEFAULT_SCALE_DEPTH)?)
}

pub fn assign_scales_with(theta: &Tree, table: &DivisorTable) -> Result<Tree> {
    assign_scales_factor(theta, table, SUPPORT_FACTOR)
}

pub fn assign_scales_factor(theta: &Tree, table: &DivisorTable, factor: f64) -> Result<Tree> {
    let scales = theta
        .nodes()
        .iter()
        .map(|n| scale_with_factor(table, table.omega.divisor(&n.momentum), factor))
        .collect::<Result<Vec<usize>>>()?;
    theta.clone().with_scales(scales)
}
