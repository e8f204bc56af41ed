//! Sparse Fourier series on the torus 𝕋^d, truncated to the ℓ¹ ball |ν|₁ ≤ N.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::float;
use crate::index::MultiIndex;
use crate::poly::Polynomial;

/// Relative drop tolerance applied after every product.
pub const DEFAULT_DROP_TOL: f64 = 1e-16;

/// A trigonometric polynomial Σ_ν c_ν e^{iν·ψ} with |ν|₁ ≤ `trunc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    dim: usize,
    trunc: u64,
    coeffs: BTreeMap<MultiIndex, Complex64>,
    /// Declares c_{−ν} = conj(c_ν); kept by operations that preserve it.
    real: bool,
}

impl FourierSeries {
    pub fn new(dim: usize, trunc: u64) -> Self {
        FourierSeries {
            dim,
            trunc,
            coeffs: BTreeMap::new(),
            real: true,
        }
    }

    /// Builds a series from `(ν, c_ν)` pairs; duplicate modes accumulate.
    pub fn from_modes<I>(dim: usize, trunc: u64, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut s = FourierSeries::new(dim, trunc);
        for (nu, c) in modes {
            s.add_to(nu, c)?;
        }
        s.real = s.symmetry_defect() <= 1e-14 * s.max_abs().max(1.0);
        Ok(s)
    }

    /// Real-valued cosine/sine helper: `amplitude · 2cos(ν·ψ)`.
    pub fn cosine(dim: usize, trunc: u64, nu: &MultiIndex, amplitude: f64) -> Result<Self> {
        Self::from_modes(
            dim,
            trunc,
            [
                (nu.clone(), Complex64::new(amplitude, 0.0)),
                (-nu, Complex64::new(amplitude, 0.0)),
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> u64 {
        self.trunc
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn modes(&self) -> impl Iterator<Item = &MultiIndex> {
        self.coeffs.keys()
    }

    pub fn get(&self, nu: &MultiIndex) -> Complex64 {
        self.coeffs.get(nu).copied().unwrap_or_default()
    }

    fn check_mode(&self, nu: &MultiIndex) -> Result<()> {
        if nu.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: nu.dim(),
            });
        }
        if nu.l1() > self.trunc {
            return Err(Error::Precondition(format!(
                "mode {nu} outside truncation |nu| <= {}",
                self.trunc
            )));
        }
        Ok(())
    }

    /// Sets c_ν; a zero value removes the mode.
    pub fn set(&mut self, nu: MultiIndex, value: Complex64) -> Result<()> {
        self.check_mode(&nu)?;
        if value == Complex64::default() {
            self.coeffs.remove(&nu);
        } else {
            self.coeffs.insert(nu, value);
        }
        Ok(())
    }

    pub fn add_to(&mut self, nu: MultiIndex, value: Complex64) -> Result<()> {
        self.check_mode(&nu)?;
        let entry = self.coeffs.entry(nu).or_default();
        *entry += value;
        Ok(())
    }

    pub fn remove(&mut self, nu: &MultiIndex) -> Option<Complex64> {
        self.coeffs.remove(nu)
    }

    /// Same coefficients under a different cutoff; modes beyond it are dropped.
    pub fn retruncated(&self, trunc: u64) -> Self {
        FourierSeries {
            dim: self.dim,
            trunc,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(nu, _)| nu.l1() <= trunc)
                .map(|(nu, c)| (nu.clone(), *c))
                .collect(),
            real: self.real,
        }
    }

    /// Σ_ν c_ν e^{iν·ψ}, summed in lexicographic mode order.
    pub fn evaluate(&self, psi: &[f64]) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(nu, c)| c * Complex64::from_polar(1.0, nu.dot(psi)))
            .sum()
    }

    /// ⟨F⟩ = c_0.
    pub fn average(&self) -> Complex64 {
        self.get(&MultiIndex::zero(self.dim))
    }

    /// Σ_ν |c_ν| e^{ξ|ν|₁}.
    pub fn weighted_norm(&self, xi: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(nu, c)| c.norm() * (xi * nu.l1() as f64).exp())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max_ν |c_{−ν} − conj(c_ν)|.
    pub fn symmetry_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(nu, c)| (self.get(&-nu) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces c_ν and c_{−ν} by their conjugate-symmetric average.
    pub fn symmetrize(&mut self) {
        let keys: Vec<MultiIndex> = self.coeffs.keys().cloned().collect();
        let mut out = BTreeMap::new();
        for nu in keys {
            let v = 0.5 * (self.get(&nu) + self.get(&-&nu).conj());
            if v != Complex64::default() {
                out.insert(-&nu, v.conj());
                out.insert(nu, v);
            }
        }
        self.coeffs = out;
        self.real = true;
    }

    /// max_ν |c_ν − d_ν| over the union of supports.
    pub fn max_abs_diff(&self, other: &FourierSeries) -> f64 {
        let mut m: f64 = 0.0;
        for (nu, c) in &self.coeffs {
            m = m.max((c - other.get(nu)).norm());
        }
        for (nu, c) in &other.coeffs {
            if !self.coeffs.contains_key(nu) {
                m = m.max(c.norm());
            }
        }
        m
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out.coeffs.retain(|_, c| *c != Complex64::default());
        out.real = self.real && factor.im == 0.0;
        out
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        let mut out = self.scale(Complex64::new(factor, 0.0));
        out.real = self.real;
        out
    }

    fn check_dim(&self, other: &FourierSeries) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// F + G under the larger of the two cutoffs.
    pub fn add(&self, other: &FourierSeries) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.trunc = self.trunc.max(other.trunc);
        for (nu, c) in &other.coeffs {
            *out.coeffs.entry(nu.clone()).or_default() += c;
        }
        out.coeffs.retain(|_, c| *c != Complex64::default());
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn sub(&self, other: &FourierSeries) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    /// Adds a constant to the zero mode.
    pub fn add_constant(&self, value: f64) -> Self {
        let mut out = self.clone();
        let zero = MultiIndex::zero(self.dim);
        *out.coeffs.entry(zero.clone()).or_default() += value;
        if out.coeffs[&zero] == Complex64::default() {
            out.coeffs.remove(&zero);
        }
        out
    }

    fn prune(&mut self, drop_tol: f64) {
        let threshold = drop_tol * self.max_abs();
        self.coeffs.retain(|_, c| c.norm() > threshold);
    }

    /// CSV lines `nu_1,...,nu_d,re,im`, modes in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (nu, c) in &self.coeffs {
            for comp in nu.components() {
                write!(out, "{comp},").unwrap();
            }
            writeln!(out, "{},{}", float(c.re), float(c.im)).unwrap();
        }
        out
    }

    /// Parses the CSV produced by [`FourierSeries::to_csv`].
    pub fn from_csv(text: &str, dim: usize, trunc: u64) -> Result<Self> {
        let mut modes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    dim + 2,
                    fields.len()
                )));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("line {}: {e}", lineno + 1));
            let nu = fields[..dim]
                .iter()
                .map(|f| f.trim().parse::<i32>().map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>>>()?;
            let re = fields[dim].trim().parse::<f64>().map_err(|e| bad(&e))?;
            let im = fields[dim + 1].trim().parse::<f64>().map_err(|e| bad(&e))?;
            modes.push((MultiIndex::new(nu), Complex64::new(re, im)));
        }
        Self::from_modes(dim, trunc, modes)
    }
}

/// Truncated Cauchy product with the default drop tolerance.
pub fn product(f: &FourierSeries, g: &FourierSeries, trunc: u64) -> Result<FourierSeries> {
    product_with(f, g, trunc, DEFAULT_DROP_TOL)
}

/// Truncated Cauchy product; output modes with |ν|₁ > `trunc` are discarded
/// and coefficients at or below `drop_tol · max|c|` are pruned (`0` keeps all
/// nonzero ones).
pub fn product_with(
    f: &FourierSeries,
    g: &FourierSeries,
    trunc: u64,
    drop_tol: f64,
) -> Result<FourierSeries> {
    f.check_dim(g)?;
    let mut out = FourierSeries::new(f.dim, trunc);
    for (a, fa) in &f.coeffs {
        for (b, gb) in &g.coeffs {
            let nu = a + b;
            if nu.l1() <= trunc {
                *out.coeffs.entry(nu).or_default() += fa * gb;
            }
        }
    }
    out.real = f.real && g.real;
    out.prune(drop_tol);
    Ok(out)
}

/// g(x) = Σ_s g_s (x − c)^s expanded around `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorPolynomial {
    pub center: f64,
    pub coeffs: Vec<f64>,
}

impl TaylorPolynomial {
    pub fn at(g: &Polynomial, center: f64) -> Self {
        TaylorPolynomial {
            center,
            coeffs: g.taylor_at(center),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// g_s(c), zero beyond the degree.
    pub fn coeff(&self, s: usize) -> f64 {
        self.coeffs.get(s).copied().unwrap_or(0.0)
    }
}

/// Σ_s g_s(c) X^s by Horner's rule, each product truncated at `trunc`.
/// The zero mode of the result is [g(c + X)]_0.
pub fn compose_polynomial(
    g: &TaylorPolynomial,
    x: &FourierSeries,
    trunc: u64,
) -> Result<FourierSeries> {
    compose_polynomial_with(g, x, trunc, DEFAULT_DROP_TOL)
}

pub fn compose_polynomial_with(
    g: &TaylorPolynomial,
    x: &FourierSeries,
    trunc: u64,
    drop_tol: f64,
) -> Result<FourierSeries> {
    let mut acc = FourierSeries::new(x.dim, trunc).add_constant(g.coeff(g.degree()));
    for s in (0..g.degree()).rev() {
        acc = product_with(&acc, x, trunc, drop_tol)?.add_constant(g.coeff(s));
    }
    acc.real = x.real;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mi<const D: usize>(v: [i32; D]) -> MultiIndex {
        MultiIndex::from(v)
    }

    fn two_cos() -> FourierSeries {
        FourierSeries::cosine(2, 8, &mi([1, 0]), 1.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let f = FourierSeries::from_modes(2, 4, [(mi([1, 0]), c(1.0, 0.0))]).unwrap();
        assert_eq!(f.evaluate(&[0.0, 0.0]), c(1.0, 0.0));
        assert_abs_diff_eq!(
            two_cos().evaluate(&[PI / 2.0, 0.0]).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(FourierSeries::new(2, 4).evaluate(&[0.3, 0.1]), c(0.0, 0.0));
    }

    #[test]
    fn product_examples() {
        let f = FourierSeries::from_modes(2, 4, [(mi([1, 0]), c(1.0, 0.0))]).unwrap();
        let g = FourierSeries::from_modes(2, 4, [(mi([-1, 0]), c(1.0, 0.0))]).unwrap();
        let p = product(&f, &g, 0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(&mi([0, 0])), c(1.0, 0.0));
        assert!(product(&f, &f, 1).unwrap().is_empty());

        let (a, b) = (c(0.7, -0.2), c(-1.3, 0.4));
        let h = FourierSeries::from_modes(2, 4, [(mi([1, 0]), a), (mi([0, 1]), b)]).unwrap();
        let sq = product(&h, &h, 2).unwrap();
        assert_eq!(sq.len(), 3);
        assert_abs_diff_eq!((sq.get(&mi([2, 0])) - a * a).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (sq.get(&mi([1, 1])) - 2.0 * a * b).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!((sq.get(&mi([0, 2])) - b * b).norm(), 0.0, epsilon = 1e-15);

        let one_d = FourierSeries::new(1, 3);
        assert_eq!(
            product(&h, &one_d, 2),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn compose_examples() {
        let x = two_cos();
        let sq = TaylorPolynomial::at(&Polynomial::monomial(2, 1.0), 0.0);
        let out = compose_polynomial(&sq, &x, 2).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.get(&mi([0, 0])), c(2.0, 0.0));
        assert_eq!(out.get(&mi([2, 0])), c(1.0, 0.0));
        assert_eq!(out.get(&mi([-2, 0])), c(1.0, 0.0));

        // g(x) = x at c: c + X
        let lin = TaylorPolynomial::at(&Polynomial::new(vec![0.0, 1.0]), 0.4);
        let out = compose_polynomial(&lin, &x, 8).unwrap();
        assert_eq!(out, x.add_constant(0.4));

        let konst = TaylorPolynomial::at(&Polynomial::new(vec![2.5]), -1.0);
        let out = compose_polynomial(&konst, &x, 8).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.average(), c(2.5, 0.0));
    }

    #[test]
    fn average_examples() {
        let f = FourierSeries::from_modes(2, 2, [(mi([0, 0]), c(3.5, 0.0))]).unwrap();
        assert_eq!(f.average(), c(3.5, 0.0));
        let g = FourierSeries::from_modes(2, 2, [(mi([1, 0]), c(1.0, 0.0))]).unwrap();
        assert_eq!(g.average(), c(0.0, 0.0));
        let x = two_cos();
        assert_eq!(product(&x, &x, 8).unwrap().average(), c(2.0, 0.0));
    }

    #[test]
    fn weighted_norm_examples() {
        let f = FourierSeries::from_modes(2, 2, [(mi([1, 0]), c(1.0, 0.0))]).unwrap();
        assert_eq!(f.weighted_norm(0.0), 1.0);
        assert_abs_diff_eq!(f.weighted_norm(1.0), std::f64::consts::E, epsilon = 1e-15);
        assert_eq!(FourierSeries::new(2, 2).weighted_norm(3.0), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let x = FourierSeries::from_modes(
            2,
            4,
            [
                (mi([1, -1]), c(0.1, 1.0 / 3.0)),
                (mi([-1, 1]), c(0.1, -1.0 / 3.0)),
            ],
        )
        .unwrap();
        let text = x.to_csv();
        assert_eq!(
            text.lines().next().unwrap(),
            "-1,1,1.0000000000000001e-1,-3.3333333333333331e-1"
        );
        assert_eq!(FourierSeries::from_csv(&text, 2, 4).unwrap(), x);
        assert!(FourierSeries::from_csv("1,2,3", 2, 4).is_err());
    }

    #[test]
    fn truncation_guard() {
        let mut s = FourierSeries::new(2, 2);
        assert!(s.set(mi([2, 1]), c(1.0, 0.0)).is_err());
        assert!(s.set(mi([1]), c(1.0, 0.0)).is_err());
    }

    fn real_series(max_mode: i32) -> impl Strategy<Value = FourierSeries> {
        prop::collection::vec(
            (
                (-max_mode..=max_mode),
                (-max_mode..=max_mode),
                -1.0f64..1.0,
                -1.0f64..1.0,
            ),
            0..6,
        )
        .prop_map(move |terms| {
            let mut modes = Vec::new();
            for (a, b, re, im) in terms {
                let nu = mi([a, b]);
                if nu.is_zero() {
                    modes.push((nu, c(re, 0.0)));
                } else {
                    modes.push((-&nu, c(re, -im)));
                    modes.push((nu, c(re, im)));
                }
            }
            FourierSeries::from_modes(2, 2 * max_mode as u64, modes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn product_commutes_and_stays_real(f in real_series(2), g in real_series(2)) {
            let fg = product_with(&f, &g, 3, 0.0).unwrap();
            let gf = product_with(&g, &f, 3, 0.0).unwrap();
            prop_assert!(fg.max_abs_diff(&gf) <= 1e-15);
            prop_assert!(fg.symmetry_defect() <= 1e-14);
        }

        #[test]
        fn associative_without_truncation(f in real_series(1), g in real_series(1), h in real_series(1)) {
            // every intermediate fits inside |nu| <= 6
            let l = product_with(&product_with(&f, &g, 6, 0.0).unwrap(), &h, 6, 0.0).unwrap();
            let r = product_with(&f, &product_with(&g, &h, 6, 0.0).unwrap(), 6, 0.0).unwrap();
            prop_assert!(l.max_abs_diff(&r) <= 1e-14);
        }

        #[test]
        fn pointwise_product(f in real_series(2), g in real_series(2), p0 in 0.0f64..6.3, p1 in 0.0f64..6.3) {
            // cutoff 8 holds the untruncated product, so the identity is exact
            let fg = product_with(&f, &g, 8, 0.0).unwrap();
            let psi = [p0, p1];
            let lhs = fg.evaluate(&psi);
            let rhs = f.evaluate(&psi) * g.evaluate(&psi);
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn compose_real(x in real_series(2), g0 in -1.0f64..1.0, g1 in -1.0f64..1.0, g3 in -1.0f64..1.0) {
            let g = TaylorPolynomial::at(&Polynomial::new(vec![g0, g1, 0.0, g3]), 0.3);
            let out = compose_polynomial_with(&g, &x, 5, 0.0).unwrap();
            prop_assert!(out.symmetry_defect() <= 1e-13);
        }
    }
}
