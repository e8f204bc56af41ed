//! Order-by-order ε expansion of the range equation at fixed c.
//!
//! Matching powers of ε in iω·ν(1+iεω·ν)X_ν + ε[g(c+X)]_ν = εf_ν gives
//!
//! ```text
//! iω·ν X^[k]_ν = δ_{k1} f_ν + (ω·ν)² X^[k−1]_ν − [g(c+X)]^(k−1)_ν,   ν ≠ 0,
//! ```
//!
//! where [·]^(m) is the ε^m coefficient of the composed jet.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{product_with, FourierSeries, TaylorPolynomial};
use crate::model::Problem;

/// Ratio ‖X^[k]‖/‖X^[k−1]‖ above which an order is flagged as amplified.
pub const DEFAULT_GROWTH_BOUND: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    /// `orders[k - 1]` is X^[k].
    pub orders: Vec<FourierSeries>,
    pub c: f64,
    pub max_order: usize,
    pub trunc: u64,
    /// Orders whose growth exceeded the geometric bound.
    pub amplified: Vec<usize>,
}

/// Per-order metadata written next to each order's CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderMeta {
    pub order: usize,
    pub norm: f64,
    pub min_divisor_used: f64,
}

impl SeriesExpansion {
    /// X^[k] for 1 ≤ k ≤ K.
    pub fn order(&self, k: usize) -> Option<&FourierSeries> {
        k.checked_sub(1).and_then(|i| self.orders.get(i))
    }

    pub fn metadata(&self, p: &Problem) -> Vec<OrderMeta> {
        self.orders
            .iter()
            .enumerate()
            .map(|(i, x)| OrderMeta {
                order: i + 1,
                norm: x.weighted_norm(0.0),
                min_divisor_used: x
                    .modes()
                    .map(|nu| p.omega.divisor(nu).abs())
                    .fold(f64::INFINITY, f64::min),
            })
            .collect()
    }
}

pub fn expand(p: &Problem, c: f64, max_order: usize, trunc: u64) -> Result<SeriesExpansion> {
    expand_with(p, c, max_order, trunc, DEFAULT_GROWTH_BOUND)
}

pub fn expand_with(
    p: &Problem,
    c: f64,
    max_order: usize,
    trunc: u64,
    growth_bound: f64,
) -> Result<SeriesExpansion> {
    if max_order == 0 {
        return Err(Error::Precondition(
            "expansion order must be at least 1".into(),
        ));
    }
    let dim = p.dim();
    let f = p.f.retruncated(trunc);
    let taylor = p.taylor(c);
    let drop_tol = p.settings.drop_tol;
    let mut orders: Vec<FourierSeries> = Vec::with_capacity(max_order);
    let mut amplified = Vec::new();

    for k in 1..=max_order {
        let mut rhs = FourierSeries::new(dim, trunc);
        if k == 1 {
            rhs = rhs.add(&f)?;
        } else {
            let prev = &orders[k - 2];
            for (nu, v) in prev.iter() {
                let w = p.omega.divisor(nu);
                rhs.add_to(nu.clone(), w * w * v)?;
            }
            let composed = jet_coefficient(&taylor, &orders, k - 1, trunc, drop_tol)?;
            rhs = rhs.sub(&composed)?;
        }
        let mut xk = FourierSeries::new(dim, trunc);
        for (nu, v) in rhs.iter() {
            if nu.is_zero() {
                continue;
            }
            let w = p.omega.divisor(nu);
            if w == 0.0 {
                return Err(Error::ZeroDivisor {
                    nu: nu.components().to_vec(),
                });
            }
            // v / (i w)
            xk.set(nu.clone(), Complex64::new(v.im / w, -v.re / w))?;
        }
        xk.symmetrize();
        if k >= 2 {
            let (a, b) = (orders[k - 2].weighted_norm(0.0), xk.weighted_norm(0.0));
            if a > 0.0 && b > growth_bound * a {
                log::warn!("order {k} grew by {:e} over order {}", b / a, k - 1);
                amplified.push(k);
            }
        }
        orders.push(xk);
    }

    Ok(SeriesExpansion {
        orders,
        c,
        max_order,
        trunc,
        amplified,
    })
}

/// The ε^m coefficient of g(c + Σ_k ε^k X^[k]) using the known orders.
fn jet_coefficient(
    taylor: &TaylorPolynomial,
    orders: &[FourierSeries],
    m: usize,
    trunc: u64,
    drop_tol: f64,
) -> Result<FourierSeries> {
    let dim = orders.first().map(|x| x.dim()).unwrap_or(0);
    let empty = FourierSeries::new(dim, trunc);
    // x[j] is the ε^j coefficient of X, j = 0..=m
    let x: Vec<&FourierSeries> = (0..=m)
        .map(|j| {
            if j == 0 {
                &empty
            } else {
                orders.get(j - 1).unwrap_or(&empty)
            }
        })
        .collect();

    let constant_jet = |value: f64| -> Vec<FourierSeries> {
        let mut jet = vec![empty.clone(); m + 1];
        jet[0] = empty.add_constant(value);
        jet
    };
    let mut acc = constant_jet(taylor.coeff(taylor.degree()));
    for s in (0..taylor.degree()).rev() {
        let mut next = constant_jet(taylor.coeff(s));
        for (i, a) in acc.iter().enumerate() {
            if a.is_empty() {
                continue;
            }
            for j in 1..=(m - i) {
                if x[j].is_empty() {
                    continue;
                }
                let prod = product_with(a, x[j], trunc, drop_tol)?;
                next[i + j] = next[i + j].add(&prod)?;
            }
        }
        acc = next;
    }
    Ok(acc.swap_remove(m))
}

/// Σ_{k≤K} ε^k X^[k].
pub fn partial_sum(s: &SeriesExpansion, eps: f64) -> FourierSeries {
    let dim = s.orders.first().map(|x| x.dim()).unwrap_or(0);
    partial_sum_to(s, eps, s.max_order).unwrap_or_else(|_| FourierSeries::new(dim, s.trunc))
}

/// Σ_{k≤K} ε^k X^[k] for K ≤ max_order.
pub fn partial_sum_to(s: &SeriesExpansion, eps: f64, order: usize) -> Result<FourierSeries> {
    let dim = s.orders.first().map(|x| x.dim()).unwrap_or(0);
    let mut out = FourierSeries::new(dim, s.trunc);
    if eps == 0.0 {
        return Ok(out);
    }
    let mut power = 1.0;
    for x in s.orders.iter().take(order) {
        power *= eps;
        out = out.add(&x.scale_real(power))?;
    }
    out.symmetrize();
    Ok(out)
}

/// r_k = ‖X^[k]‖^{1/k}, a proxy for the inverse convergence radius.
pub fn convergence_diagnostic(s: &SeriesExpansion) -> Result<Vec<f64>> {
    if s.max_order < 3 {
        return Err(Error::Precondition(
            "convergence diagnostic needs at least 3 orders".into(),
        ));
    }
    Ok(s.orders
        .iter()
        .enumerate()
        .map(|(i, x)| x.weighted_norm(0.0).powf(1.0 / (i + 1) as f64))
        .collect())
}
